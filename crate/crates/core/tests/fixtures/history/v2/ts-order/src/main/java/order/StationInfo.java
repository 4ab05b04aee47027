package order;

import javax.persistence.Entity;

@Entity
public class StationInfo {
    private String id;
    private String name;
    private int distance;
}
